#!/usr/bin/env python3
"""Builds the ADULT benchmark fixture used by the end-to-end SVM tests.

Encodes each census record as 15 unsigned 8-bit features, trains one
degree-2 polynomial SVM per class (one-vs-all) on a small subsample, and
writes the model in the plain-text model format plus a held-out CSV.

Usage: make_adult_fixture.py ADULT_DATA ADULT_TEST OUT_DIR
"""
import math
import sys

import numpy as np
from sklearn.svm import SVC

COLUMNS = ["age", "workclass", "fnlwgt", "education", "education_num",
           "marital", "occupation", "relationship", "race", "sex",
           "capital_gain", "capital_loss", "hours", "country"]
CONTINUOUS = {"age": False, "fnlwgt": True, "education_num": False,
              "capital_gain": True, "capital_loss": True, "hours": False}
CATEGORICAL = ["workclass", "education", "marital", "occupation",
               "relationship", "race", "sex", "country"]

SEED = 7
N_TRAIN = 220
N_TEST = 500
GAMMA = 1.0 / (15 * 128.0 * 128.0)
COEF0 = 1.0
C = 1.0


def read(path):
    rows = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 15 or "?" in parts:
                continue
            rec = dict(zip(COLUMNS, parts[:14]))
            rec["label"] = 1 if parts[14].startswith(">50K") else 0
            rows.append(rec)
    return rows


def fit_encoder(train):
    enc = {}
    for name, logscale in CONTINUOUS.items():
        vals = np.array([float(r[name]) for r in train])
        if logscale:
            vals = np.log1p(vals)
        enc[name] = (vals.min(), vals.max(), logscale)
    for name in CATEGORICAL:
        stats = {}
        for r in train:
            s = stats.setdefault(r[name], [0, 0])
            s[0] += r["label"]
            s[1] += 1
        ranked = sorted(stats, key=lambda k: stats[k][0] / stats[k][1])
        step = 255.0 / max(1, len(ranked) - 1)
        enc[name] = {k: int(round(i * step)) for i, k in enumerate(ranked)}
    return enc


def encode(rec, enc):
    out = []
    for name in COLUMNS:
        if name in CONTINUOUS:
            lo, hi, logscale = enc[name]
            v = float(rec[name])
            if logscale:
                v = math.log1p(v)
            v = 255.0 * (v - lo) / (hi - lo) if hi > lo else 0.0
            out.append(int(min(255, max(0, round(v)))))
        else:
            out.append(enc[name].get(rec[name], 0))
    out.append(255 if rec["marital"] == "Married-civ-spouse" else 0)
    return out


def main():
    data_path, test_path, out_dir = sys.argv[1:4]
    train_all = read(data_path)
    test_all = read(test_path)
    rng = np.random.default_rng(SEED)
    enc = fit_encoder(train_all)

    idx = rng.choice(len(train_all), N_TRAIN, replace=False)
    x = np.array([encode(train_all[i], enc) for i in idx], dtype=float)
    y = np.array([train_all[i]["label"] for i in idx])

    tidx = rng.choice(len(test_all), N_TEST, replace=False)
    xt = np.array([encode(test_all[i], enc) for i in tidx], dtype=int)
    yt = np.array([test_all[i]["label"] for i in tidx])

    machines = []
    for cls in (0, 1):
        svc = SVC(kernel="poly", degree=2, gamma=GAMMA, coef0=COEF0, C=C)
        svc.fit(x, (y == cls).astype(int))
        alphas = svc.dual_coef_[0]
        svs = svc.support_vectors_.astype(int)
        machines.append((-float(svc.intercept_[0]), alphas, svs))

    scores = np.zeros((len(xt), 2))
    for cls, (rho, alphas, svs) in enumerate(machines):
        k = (GAMMA * xt @ svs.T + COEF0) ** 2
        scores[:, cls] = k @ alphas - rho
    acc = float(np.mean(np.argmax(scores, axis=1) == yt))
    n_sv = sum(len(m[1]) for m in machines)
    print(f"support vectors: {n_sv}, float accuracy: {acc:.4f}")

    with open(f"{out_dir}/adult_model.txt", "w") as f:
        f.write("# ADULT one-vs-all polynomial SVM, 15 x 8-bit features\n")
        f.write(f"classes 2\nfeatures 15\ndegree 2\n")
        f.write(f"gamma {GAMMA!r}\ncoef0 {COEF0!r}\n")
        for rho, alphas, svs in machines:
            f.write(f"rho {rho!r}\n")
            for a, sv in zip(alphas, svs):
                f.write(repr(float(a)) + " " + " ".join(str(v) for v in sv) + "\n")
    with open(f"{out_dir}/adult_test.csv", "w") as f:
        for label, row in zip(yt, xt):
            f.write(",".join(str(v) for v in [label, *row]) + "\n")


if __name__ == "__main__":
    main()
