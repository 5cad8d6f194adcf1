"""Character distributions, entropy and column statistics.

Profiles the columns of a small employee table and prints the feature
values a classifier would see.
"""
from semlabel import char_profile, stat_features
from semlabel.corpus import Attribute

columns = {
    "employer": ["CSIRO", "Data61", "NICTA"],
    "employee": ["Neil", "Mary", "Henry"],
    "DOB": ["05/21/1916", "12/07/1990", "03/15/2000"],
}

print("=== character profiles (base features) ===")
for name, values in columns.items():
    profile = char_profile(values)
    top = sorted(
        ((p, i) for i, p in enumerate(profile.dist) if p > 0), reverse=True
    )[:4]
    from semlabel import VOCABULARY

    frequent = ", ".join(f"{VOCABULARY[i]!r}:{p:.2f}" for p, i in top)
    print(f"{name:>10}: entropy={profile.entropy:.3f}  top chars: {frequent}")

print()
print("=== the 26 column statistics ===")
for name, values in columns.items():
    attr = Attribute(name=name, values=tuple(values), source_name="Employees")
    stats = stat_features(attr)
    print(f"{name:>10}: mean_len={stats.len_mean:.3f}  alpha_ratio={stats.alpha_ratio:.3f}"
          f"  digit_ratio={stats.digit_ratio:.3f}  unique={stats.unique_ratio:.2f}"
          f"  dates={stats.date_ratio:.2f}")

print()
print("stat names in vector order:")
print(", ".join(stats._fields))
