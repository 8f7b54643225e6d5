"""Writes data/sample.csv: 600 rows, 400 with sex=M and 200 with sex=F."""
import csv
import random
import sys
from pathlib import Path


def main(out: Path) -> None:
    rng = random.Random(20240611)
    regions = ["north", "south", "east", "west"]
    rows = []
    for i in range(600):
        sex = "M" if i % 3 != 2 else "F"
        age = rng.randint(18, 70)
        hours = round(rng.uniform(10, 60), 2)
        score = round(rng.gauss(50, 12), 3)
        region = rng.choices(regions, weights=[4, 3, 2, 1])[0]
        base = 20 + 0.4 * hours + 0.3 * (age - 18)
        slope = 0.25 if sex == "M" else -0.1
        income = base + slope * score + (5 if region == "north" else 0) + rng.gauss(0, 3)
        rows.append([age, sex, hours, region, score, round(income, 3)])
    with out.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["age", "sex", "hours", "region", "score", "income"])
        w.writerows(rows)


if __name__ == "__main__":
    main(Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "sample.csv"))
