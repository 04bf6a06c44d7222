#!/usr/bin/env python3
"""Prepare the ProPublica COMPAS two-year recidivism file for auditing.

Input: compas-scores-two-years.csv from the ProPublica compas-analysis
repository (not bundled here; obtain it separately).

Output: a CSV with categorical audit features, the two-year recidivism
outcome (y), and a baseline predicted probability (p) obtained by fitting an
unpenalized logistic regression of the outcome on the categorized decile
score. Auditing these decile-only predictions asks whether any subgroup's
observed recidivism deviates from what its risk scores imply.

Usage:
    python3 tools/prepare_compas.py compas-scores-two-years.csv data/compas_prepared.csv
"""
import sys

import numpy as np
import pandas as pd
from sklearn.linear_model import LogisticRegression


def propublica_filter(df: pd.DataFrame) -> pd.DataFrame:
    """The standard ProPublica filter; yields n=6172 on the canonical file."""
    df = df[(df["days_b_screening_arrest"] <= 30)
            & (df["days_b_screening_arrest"] >= -30)]
    df = df[df["is_recid"] != -1]
    df = df[df["c_charge_degree"] != "O"]
    df = df[df["score_text"] != "N/A"]
    return df


def categorize(df: pd.DataFrame) -> pd.DataFrame:
    out = pd.DataFrame()
    out["sex"] = df["sex"]
    out["age_cat"] = pd.cut(df["age"], bins=[0, 24, 45, 200],
                            labels=["under_25", "25_to_45", "over_45"]).astype(str)
    out["race"] = df["race"].str.replace(" ", "_")
    out["priors_cat"] = pd.cut(df["priors_count"], bins=[-1, 0, 5, 1000],
                               labels=["0", "1_to_5", "over_5"]).astype(str)
    out["charge_degree"] = df["c_charge_degree"]
    out["y"] = df["two_year_recid"].astype(int)
    return out


def decile_baseline(df: pd.DataFrame) -> np.ndarray:
    """Unpenalized logistic regression of the outcome on decile indicators."""
    deciles = pd.get_dummies(df["decile_score"].astype(int), prefix="decile")
    model = LogisticRegression(penalty=None, max_iter=1000)
    model.fit(deciles.values, df["two_year_recid"].astype(int).values)
    return model.predict_proba(deciles.values)[:, 1]


def main() -> None:
    if len(sys.argv) != 3:
        print(__doc__, file=sys.stderr)
        sys.exit(2)
    raw = pd.read_csv(sys.argv[1])
    filtered = propublica_filter(raw)
    print(f"rows after filter: {len(filtered)} (canonical file gives 6172)")
    prepared = categorize(filtered)
    prepared["p"] = decile_baseline(filtered)
    prepared.to_csv(sys.argv[2], index=False)
    print(f"wrote {sys.argv[2]}")


if __name__ == "__main__":
    main()
