#!/usr/bin/env python3
"""Convert the public Breast Cancer (MASS biopsy) and Palmer penguins tables
into numeric CSVs that `ssdr cv` reads directly.

    python tools/prepare_datasets.py --biopsy biopsy.csv --penguins penguins.csv --out data/

Rows with missing values are dropped. The label is the last column ("class"
for biopsy, "species" for penguins).
"""

import argparse
import pathlib
import sys

import pandas as pd

PENGUIN_FEATURES = {
    # measurements plus coded island and sex, year left out
    "island_sex": ["island", "bill_length_mm", "bill_depth_mm", "flipper_length_mm",
                   "body_mass_g", "sex"],
    "sex_year": ["bill_length_mm", "bill_depth_mm", "flipper_length_mm", "body_mass_g",
                 "sex", "year"],
    "island_year": ["island", "bill_length_mm", "bill_depth_mm", "flipper_length_mm",
                    "body_mass_g", "year"],
    "measurements": ["bill_length_mm", "bill_depth_mm", "flipper_length_mm", "body_mass_g"],
}


def prepare_biopsy(src, dst):
    df = pd.read_csv(src)
    features = [f"V{i}" for i in range(1, 10)]
    missing = [c for c in features + ["class"] if c not in df.columns]
    if missing:
        sys.exit(f"{src}: missing columns {missing}")
    df = df[features + ["class"]].dropna()
    df.to_csv(dst, index=False)
    return df


def prepare_penguins(src, dst, feature_set):
    df = pd.read_csv(src)
    cols = PENGUIN_FEATURES[feature_set]
    df = df[cols + ["species"]].dropna()
    for c in ("island", "sex"):
        if c in df.columns:
            # stable integer codes in sorted label order
            df[c] = pd.Categorical(df[c], categories=sorted(df[c].unique())).codes + 1
    df.to_csv(dst, index=False)
    return df


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--biopsy", type=pathlib.Path, help="MASS biopsy CSV")
    ap.add_argument("--penguins", type=pathlib.Path, help="palmerpenguins penguins.csv")
    ap.add_argument("--penguin-features", choices=sorted(PENGUIN_FEATURES), default="island_sex")
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("."))
    args = ap.parse_args()
    if not args.biopsy and not args.penguins:
        ap.error("nothing to do: pass --biopsy and/or --penguins")
    args.out.mkdir(parents=True, exist_ok=True)
    if args.biopsy:
        dst = args.out / "breast_cancer.csv"
        df = prepare_biopsy(args.biopsy, dst)
        print(f"{dst}: n={len(df)} p={df.shape[1] - 1} classes={df['class'].value_counts().to_dict()}")
    if args.penguins:
        dst = args.out / "penguins.csv"
        df = prepare_penguins(args.penguins, dst, args.penguin_features)
        print(f"{dst}: n={len(df)} p={df.shape[1] - 1} classes={df['species'].value_counts().to_dict()}")


if __name__ == "__main__":
    main()
