#!/usr/bin/env python3
"""Writes the synthetic fixture corpus used by the test suites.

Filings, ratings, financials, mock rules and config are generated here; the
feature store is produced afterwards with `creditxai ingest` + `creditxai
features --lexical` (see README.md, Fixtures).

Regimes: each company-year gets a business and a governance text regime.
Years sharing a regime share their item wording, so the most similar prior
year is the one with the same regime. The financial rows are checked below
against the adjustment vote rules so the quantitative proposals come out as
designed.
"""

import argparse
import csv
import json
import math
import random
import statistics
from pathlib import Path

YEARS = [2018, 2019, 2020, 2021]
CUTOFF = 2020
GRADES = ["AAA", "AA", "A", "BBB", "BB", "B", "CCC", "C"]

SECTORS = {
    "technology": {"current_ratio": 2.0, "debt_to_equity": 0.8, "operating_margin": 0.18, "interest_coverage": 12.0},
    "industrials": {"current_ratio": 1.5, "debt_to_equity": 1.2, "operating_margin": 0.10, "interest_coverage": 6.0},
    "utilities": {"current_ratio": 1.0, "debt_to_equity": 1.6, "operating_margin": 0.14, "interest_coverage": 4.0},
}
HIGHER_IS_BETTER = {"current_ratio": True, "debt_to_equity": False, "operating_margin": True, "interest_coverage": True}
INDICATORS = list(HIGHER_IS_BETTER)

# grades, business regimes, governance regimes per year 2018..2021, and the
# oriented indicator moves (fraction, + = favorable) for the test years.
COMPANIES = {
    "TECA": ("technology", ["A", "A", "A", "A"], "aaaa", "pppp",
             {2020: {}, 2021: {"current_ratio": 0.30}}),
    "TECB": ("technology", ["BBB", "BB", "BB", "BB"], "abba", "pqqq",
             {2020: {}, 2021: {}}),
    "INDA": ("industrials", ["BB", "B", "BB", "B"], "abab", "pqpq",
             {2020: {"current_ratio": 0.28, "operating_margin": 0.28},
              2021: {"debt_to_equity": -0.28, "interest_coverage": -0.28}}),
    "INDB": ("industrials", ["CCC", "B", "B", "B"], "abbb", "pqqp",
             {2020: {}, 2021: {}}),
    "UTLA": ("utilities", ["AA", "AA", "AA", "AA"], "aaaa", "pppp",
             {2020: {"interest_coverage": -0.30}, 2021: {"interest_coverage": -0.15}}),
    "UTLB": ("utilities", ["A", "BBB", "A", "A"], "abab", "pqqp",
             {2020: {"operating_margin": 0.30}, 2021: {"operating_margin": 0.20}}),
}
PEERS_PER_SECTOR = 3

# What the fixture is built to produce in history mode (test years).
EXPECTED_FRA_DELTA = {
    ("TECA", 2020): 0, ("TECA", 2021): 1,
    ("TECB", 2020): 0, ("TECB", 2021): 0,
    ("INDA", 2020): 1, ("INDA", 2021): -1,
    ("INDB", 2020): 0, ("INDB", 2021): 0,
    ("UTLA", 2020): -1, ("UTLA", 2021): 0,
    ("UTLB", 2020): 1, ("UTLB", 2021): 0,
}

SENTENCES = [
    "We design and sell products through direct channels and a network of regional distributors.",
    "Demand for our core offerings remained steady across our principal geographic markets.",
    "Competition intensified as new entrants priced aggressively in several product categories.",
    "We completed the integration of an acquired business and consolidated two manufacturing sites.",
    "Raw material costs increased and we were only partially able to pass them on to customers.",
    "Our backlog grew on the strength of multi-year contracts with large institutional customers.",
    "A significant customer reduced its orders, which lowered volumes in the second half.",
    "We refinanced a term loan and extended the maturity of our revolving credit facility.",
    "Covenant headroom narrowed and we obtained a waiver from our lenders during the year.",
    "Capital expenditure focused on capacity expansion and the modernisation of our network.",
    "Regulatory proceedings concerning our tariffs were concluded with a favourable outcome.",
    "A rate case remains pending and its outcome could materially affect our allowed returns.",
    "Cybersecurity incidents could disrupt operations and expose us to litigation and fines.",
    "Our operations depend on a limited number of suppliers for critical components.",
    "Foreign exchange movements reduced reported revenue in our international segment.",
    "We restructured our sales organisation and recorded severance charges.",
    "Free cash flow improved as working capital requirements declined.",
    "Liquidity was supported by cash on hand and undrawn committed credit lines.",
    "We impaired goodwill associated with an underperforming reporting unit.",
    "Pricing actions and a richer product mix expanded gross margin.",
    "Weather conditions reduced demand in our service territory during the heating season.",
    "We divested a non-core division and used the proceeds to repay debt.",
    "Interest rate increases raised our borrowing costs on floating rate obligations.",
    "A product recall resulted in warranty costs and customer credits.",
    "Our research pipeline includes several launches planned over the next two years.",
    "Labour shortages at two plants constrained output and raised overtime costs.",
    "We are exposed to environmental remediation obligations at former industrial sites.",
    "Our pension plan funded status improved following asset returns above assumptions.",
    "Management expects revenue growth to moderate given softer end-market conditions.",
    "We hedge a portion of our commodity exposure with exchange-traded contracts.",
    "Dependence on government contracts subjects us to budget and appropriation risk.",
    "Market share gains in the premium segment offset declines in entry-level products.",
]

GOV_SENTENCES = [
    "The board consists of nine directors, seven of whom are independent under exchange rules.",
    "The roles of chair and chief executive officer are held by the same person.",
    "A lead independent director presides over executive sessions of the board.",
    "The audit committee met eight times and reviewed the internal audit plan.",
    "Management concluded that internal control over financial reporting was effective.",
    "Management identified a material weakness in controls over revenue recognition.",
    "Remediation of the previously reported material weakness was completed during the year.",
    "Executive compensation is weighted toward long-term performance share units.",
    "Annual bonuses were paid above target despite lower operating results.",
    "Our founder controls a majority of the voting power through a dual-class structure.",
    "Related party transactions with entities controlled by a director were approved by the audit committee.",
    "The company leases its headquarters from an affiliate of the chief executive officer.",
    "Directors are elected annually by a majority of votes cast.",
    "The board is classified into three staggered classes with three-year terms.",
    "Stock ownership guidelines require executives to hold shares worth five times salary.",
    "The chief financial officer resigned and an interim successor was appointed.",
    "Our independent auditor was replaced following a competitive tender.",
    "The nominating committee adopted a policy on director tenure and refreshment.",
    "Clawback provisions apply to incentive compensation in the event of a restatement.",
    "Several directors serve on the boards of more than four public companies.",
    "Disclosure controls and procedures were evaluated with the participation of senior management.",
    "Shareholders approved the say-on-pay proposal with ninety-four percent support.",
    "Principal accountant fees for non-audit services declined relative to audit fees.",
    "Insider ownership represents approximately thirty percent of outstanding shares.",
]

ITEMS = [
    ("1", "Business", "biz"),
    ("1A", "Risk Factors", "biz"),
    ("1B", "Unresolved Staff Comments", "generic"),
    ("2", "Properties", "generic"),
    ("3", "Legal Proceedings", "generic"),
    ("4", "Mine Safety Disclosures", "generic"),
    ("5", "Market for Registrant's Common Equity", "generic"),
    ("7", "Management's Discussion and Analysis of Financial Condition and Results of Operations", "biz"),
    ("7A", "Quantitative and Qualitative Disclosures About Market Risk", "biz"),
    ("8", "Financial Statements and Supplementary Data", "generic"),
    ("9A", "Controls and Procedures", "gov"),
    ("10", "Directors, Executive Officers and Corporate Governance", "gov"),
    ("11", "Executive Compensation", "gov"),
    ("13", "Certain Relationships and Related Transactions, and Director Independence", "gov"),
]


def regime_text(company, item_id, kind, regime):
    pool = SENTENCES if kind == "biz" else GOV_SENTENCES
    rng = random.Random(f"{company}|{item_id}|{regime}")
    picks = rng.sample(pool, 5)
    return " ".join(picks)


def filing_text(company, year, sector, biz_regime, gov_regime):
    lines = [f"{company} CORPORATION", f"ANNUAL REPORT ON FORM 10-K FOR THE FISCAL YEAR {year}", "",
             "TABLE OF CONTENTS"]
    for item_id, title, _ in ITEMS:
        lines.append(f"Item {item_id}. {title}")
    lines.append("")
    lines.append("PART I")
    for item_id, title, kind in ITEMS:
        lines.append("")
        lines.append(f"ITEM {item_id}. {title.upper()}")
        lines.append("")
        if kind == "biz":
            body = regime_text(company, item_id, kind, biz_regime)
        elif kind == "gov":
            body = regime_text(company, item_id, kind, gov_regime)
        else:
            body = (f"{company} is a {sector} company. This item is presented in the format required by the "
                    f"form and contains no information that differs materially from prior filings. "
                    f"Reference is made to the notes to the consolidated financial statements.")
        lines.append(body)
        lines.append(f"Fiscal year {year} disclosures for {company}.")
    lines.append("")
    return "\n".join(lines)


def build_financials():
    rng = random.Random(20240501)
    rows = []
    # reference-period noise stays within +/-4% so medians sit near the sector values
    for company, (sector, *_rest) in COMPANIES.items():
        moves = _rest[3]
        base = SECTORS[sector]
        for year in YEARS:
            vals = {}
            for ind, typical in base.items():
                if year < CUTOFF:
                    vals[ind] = typical * (1 + rng.uniform(-0.04, 0.04))
                else:
                    oriented = moves.get(year, {}).get(ind, 0.0)
                    sign = 1.0 if HIGHER_IS_BETTER[ind] else -1.0
                    vals[ind] = typical * (1 + sign * oriented)
            rows.append((company, year, sector, vals))
    for sector, base in SECTORS.items():
        for p in range(PEERS_PER_SECTOR):
            company = f"{sector[:3].upper()}P{p + 1}"
            for year in YEARS:
                vals = {ind: typical * (1 + rng.uniform(-0.04, 0.04)) for ind, typical in base.items()}
                rows.append((company, year, sector, vals))
    return rows


def round_vals(rows):
    return [(c, y, s, {k: float(f"{v:.6g}") for k, v in vals.items()}) for c, y, s, vals in rows]


def check_fra(rows):
    """Replays the quantitative adjustment rules on the written rows."""
    ref = [r for r in rows if r[1] < CUTOFF]
    medians = {}
    for sector in SECTORS:
        for ind in INDICATORS:
            medians[(sector, ind)] = statistics.median(r[3][ind] for r in ref if r[2] == sector)
    lookup = {(c, y): vals for c, y, _, vals in rows}
    for (company, year), want in EXPECTED_FRA_DELTA.items():
        sector = COMPANIES[company][0]
        cur, prev = lookup[(company, year)], lookup[(company, year - 1)]
        votes = []
        for ind in INDICATORS:
            sign = 1.0 if HIGHER_IS_BETTER[ind] else -1.0
            dev = sign * (cur[ind] - medians[(sector, ind)]) / medians[(sector, ind)]
            yoy = sign * (cur[ind] - prev[ind]) / abs(prev[ind])
            v = 0
            if abs(dev) >= 0.75:
                v = 2 if dev > 0 else -2
            elif abs(dev) >= 0.25:
                v = 1 if dev > 0 else -1
            if abs(yoy) >= 0.40:
                v += 2 if yoy > 0 else -2
            votes.append(max(-2, min(2, v)))
        mean = sum(votes) / len(votes)
        x = mean * 2
        delta = int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)
        delta = max(-2, min(2, delta))
        if delta != want:
            raise SystemExit(f"{company} {year}: votes {votes} give delta {delta}, wanted {want}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests/fixtures/corpus"))
    args = ap.parse_args()
    out = Path(args.out)
    (out / "filings").mkdir(parents=True, exist_ok=True)

    with open(out / "ratings.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["company_id", "fiscal_year", "sector", "rating"])
        for company, (sector, grades, *_r) in COMPANIES.items():
            for year, g in zip(YEARS, grades):
                w.writerow([company, year, sector, g])

    for company, (sector, grades, biz, gov, _m) in COMPANIES.items():
        for i, year in enumerate(YEARS):
            text = filing_text(company, year, sector, biz[i], gov[i])
            (out / "filings" / f"{company}_{year}.txt").write_text(text)

    rows = round_vals(build_financials())
    check_fra(rows)
    with open(out / "financials.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["company_id", "fiscal_year", "sector"] + INDICATORS)
        for c, y, s, vals in rows:
            w.writerow([c, y, s] + [f"{vals[i]:.6g}" for i in INDICATORS])

    rules = {"rules": [
        {"name": "business view follows the most similar prior year", "agent": "BRA",
         "echo_grade_field": "ANCHOR_GRADE"},
        {"name": "governance view follows the most similar prior year", "agent": "GRA",
         "echo_grade_field": "ANCHOR_GRADE"},
        {"name": "financial agent accepts the quantitative proposal", "agent": "FRA",
         "echo_grade_field": "PROPOSED_GRADE"},
        {"name": "governance nudges the composite one notch towards its own view", "agent": "GRA_ADJUST",
         "nudge": {"from": "COMPOSITE_GRADE", "toward": "INITIAL_GOVERNANCE_GRADE", "max": 1}},
        {"name": "coordinator keeps the deterministic fusion", "agent": "CAA",
         "echo_grade_field": "DETERMINISTIC_FUSION_GRADE"},
    ]}
    (out / "mock_rules.json").write_text(json.dumps(rules, indent=2) + "\n")

    config = {
        "alpha": 5.0, "window_k": 3, "delta": 0.15, "w_high": 0.7, "w_base": 0.5,
        "min_support": 5, "dims": {"finance": 768, "general": 384},
        "caa": {"mode": "deterministic"},
        "backend": {"type": "mock", "seed": 7, "rules": "mock_rules.json"},
        "features": {"provider": "store", "store": "features.jsonl"},
        "split": {"cutoff_year": CUTOFF},
        "workers": 2,
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n")
    print(f"wrote corpus to {out}")


if __name__ == "__main__":
    main()
