"""Writes diabetes_like.csv: a synthetic stand-in for the Pima diabetes table.

Glucose depends on the predictors through one linear index,
    Glucose = 120 + 25 * tanh(z) + 3 * z**2 + N(0, 6^2),
    z = 0.35*BMI_s + 0.10*Preg_s + 0.15*DPF_s + 0.45*Age_s + 0.75*Insulin_s + 0.10*BP_s
where *_s are standardized predictors. Seven rows carry an NA cell.
Run from this directory: python3 make_diabetes_like.py
"""

import csv
import math
import random

N = 2000
SEED = 20240601
BETA = {"BMI": 0.35, "Pregnancies": 0.10, "DPF": 0.15, "Age": 0.45, "Insulin": 0.75, "BP": 0.10}
SPEC = {
    "BMI": (32.0, 7.0),
    "Pregnancies": (3.8, 3.3),
    "DPF": (0.47, 0.33),
    "Age": (33.0, 11.7),
    "Insulin": (120.0, 90.0),
    "BP": (72.0, 12.0),
}
NA_ROWS = {17, 230, 512, 901, 1333, 1650, 1999}


def main():
    rng = random.Random(SEED)
    rows = []
    for i in range(N):
        std = {k: rng.gauss(0.0, 1.0) for k in SPEC}
        z = sum(BETA[k] * std[k] for k in SPEC)
        glucose = 120.0 + 25.0 * math.tanh(z) + 3.0 * z * z + rng.gauss(0.0, 6.0)
        raw = {k: SPEC[k][0] + SPEC[k][1] * std[k] for k in SPEC}
        row = [f"{glucose:.1f}", f"{raw['BMI']:.1f}", f"{raw['Pregnancies']:.2f}", f"{raw['DPF']:.3f}",
               f"{raw['Age']:.1f}", f"{raw['Insulin']:.1f}", f"{raw['BP']:.1f}"]
        if i in NA_ROWS:
            row[1 + i % 6] = "NA"
        rows.append(row)
    with open("diabetes_like.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["Glucose", "BMI", "Pregnancies", "DPF", "Age", "Insulin", "BP"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
