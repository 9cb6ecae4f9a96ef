#!/usr/bin/env python3
"""Derive data/compas/compas.csv from ProPublica's compas-scores-two-years.csv.

Usage: prepare_compas.py <compas-scores-two-years.csv> <out-dir>

Row filter is ProPublica's standard one (screening within 30 days of
arrest, valid recidivism flag, charge degree F/M, scored). Medium-risk
defendants are dropped so the label is a clean low (0) vs high (1) risk
score group. The seven features are numerically encoded here so that the
Rust loader never has to deal with categories.
"""
import json
import sys

import pandas as pd

FEATURES = [
    "age",
    "sex_male",
    "race_african_american",
    "priors_count",
    "juv_count",
    "c_charge_degree_felony",
    "length_of_stay",
]
LABEL = "high_risk"


def main(src, out_dir):
    df = pd.read_csv(src)
    keep = (
        df.days_b_screening_arrest.between(-30, 30)
        & (df.is_recid != -1)
        & (df.c_charge_degree != "O")
        & (df.score_text != "N/A")
        & (df.score_text != "Medium")
    )
    d = df[keep]
    out = pd.DataFrame(
        {
            "age": d.age,
            "sex_male": (d.sex == "Male").astype(int),
            "race_african_american": (d.race == "African-American").astype(int),
            "priors_count": d.priors_count,
            "juv_count": d.juv_fel_count + d.juv_misd_count + d.juv_other_count,
            "c_charge_degree_felony": (d.c_charge_degree == "F").astype(int),
            "length_of_stay": (
                pd.to_datetime(d.c_jail_out) - pd.to_datetime(d.c_jail_in)
            ).dt.days,
            LABEL: (d.score_text == "High").astype(int),
        }
    )
    out.to_csv(f"{out_dir}/compas.csv", index=False)
    with open(f"{out_dir}/schema.json", "w") as fh:
        json.dump({"names": FEATURES, "label_name": LABEL}, fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(out)} rows")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
