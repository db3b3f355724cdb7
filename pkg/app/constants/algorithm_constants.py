# app/constants/algorithm_constants.py

# Knapsack boundary is inclusive up to this slack
KNAPSACK_TOLERANCE = 1e-12
VALUE_TOLERANCE = 1e-9
SYMMETRY_TOLERANCE = 1e-9

BRUTE_FORCE_MAX_N = 20
CLASS_CHECK_MAX_N = 10

K_SYSTEM = "k-system"
K_EXTENDIBLE = "k-extendible"

RATING_THRESHOLD = 5.0

REPORT_COLUMNS = [
    "algorithm",
    "params",
    "size",
    "value",
    "value_calls",
    "independence_calls",
    "E",
    "ms",
]

HARNESS_COLUMNS = [
    "instance",
    "algorithm",
    "value",
    "opt",
    "ratio",
    "calls",
    "bound",
    "pass",
]

# Non-canonical. Nudges genre fractions the way the movie experiments
# describe ("slightly higher" / "slightly lower") without published values.
ILLUSTRATIVE_GENRE_ADJUSTMENTS = {
    "Crime": 1.2,
    "Drama": 1.2,
    "Thriller": 1.2,
    "Animation": 0.8,
    "Children": 0.8,
    "Horror": 0.8,
    "Romance": 0.8,
}
