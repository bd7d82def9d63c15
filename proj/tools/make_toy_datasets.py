"""Regenerates the small sample datasets under data/datasets."""

import csv
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "datasets"
ROWS = 120


def netflix(rng):
    countries = ["United States", "India", "United Kingdom", "Japan", "South Korea", "France"]
    genres = ["Drama", "Comedy", "Documentary", "Action", "Kids"]
    rows = []
    for i in range(ROWS):
        country = rng.choices(countries, weights=[40, 20, 15, 10, 8, 7])[0]
        if country == "India":
            kind = rng.choices(["Movie", "TV Show"], weights=[93, 7])[0]
            rating = rng.choices(["TV-14", "TV-MA", "TV-PG", "R"], weights=[55, 20, 15, 10])[0]
        else:
            kind = rng.choices(["Movie", "TV Show"], weights=[66, 34])[0]
            rating = rng.choices(["TV-MA", "TV-14", "TV-PG", "R", "PG-13", "TV-Y"], weights=[35, 20, 15, 12, 10, 8])[0]
        duration = rng.randint(80, 160) if kind == "Movie" else rng.randint(1, 6)
        rows.append({
            "show_id": f"s{i + 1}",
            "type": kind,
            "country": country,
            "rating": rating,
            "genre": rng.choice(genres),
            "release_year": rng.randint(1995, 2021),
            "duration": duration,
        })
    return rows


def flights(rng):
    airlines = ["AA", "DL", "UA", "WN", "B6"]
    airports = ["BOS", "JFK", "LAX", "ORD", "ATL", "SFO"]
    rows = []
    for _ in range(ROWS):
        month = rng.randint(1, 12)
        summer = month in (6, 7, 8)
        reason = rng.choices(["none", "weather", "carrier", "late_aircraft", "security"],
                             weights=[50, 20 if summer else 8, 15, 15, 2])[0]
        delay = 0 if reason == "none" else rng.randint(5, 180 if reason == "weather" else 90)
        rows.append({
            "airline": rng.choice(airlines),
            "origin_airport": rng.choice(airports),
            "destination_airport": rng.choice(airports),
            "month": month,
            "day_of_week": rng.randint(1, 7),
            "departure_delay": delay,
            "delay_reason": reason,
            "distance": rng.randint(150, 2700),
        })
    return rows


def playstore(rng):
    categories = ["GAME", "FAMILY", "TOOLS", "EDUCATION", "FINANCE", "SOCIAL"]
    rows = []
    for i in range(ROWS):
        kind = rng.choices(["Free", "Paid"], weights=[85, 15])[0]
        installs = rng.choices(["10K+", "100K+", "1M+", "10M+"], weights=[30, 30, 25, 15])[0]
        rows.append({
            "app": f"app_{i + 1}",
            "category": rng.choice(categories),
            "type": kind,
            "content_rating": rng.choices(["Everyone", "Teen", "Mature 17+"], weights=[60, 30, 10])[0],
            "installs": installs,
            "rating": round(rng.uniform(2.5, 5.0), 1),
            "reviews": rng.randint(10, 500000),
            "price": 0 if kind == "Free" else rng.choice([0.99, 1.99, 2.99, 4.99, 9.99]),
            "size_mb": rng.randint(2, 150),
        })
    return rows


def write(name, rows):
    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / f"{name}.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def main():
    rng = random.Random(7)
    write("netflix", netflix(rng))
    write("flights", flights(rng))
    write("playstore", playstore(rng))


if __name__ == "__main__":
    main()
