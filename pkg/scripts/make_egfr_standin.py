"""Write the 23-species / 47-reaction EGFR-shaped stand-in network.

Topology follows the usual receptor / PLCgamma / Grb2-SOS / Shc cascade;
reactions 7, 14 and 29 are Michaelis-Menten, the rest mass action.  Rate
constants are plausible positive values chosen for a fast desk-scale run,
not literature values.

    python scripts/make_egfr_standin.py [out.json]
"""
import json
import sys
from pathlib import Path

SPECIES = {
    "EGF": 60, "R": 40, "Ra": 0, "R2": 0, "RP": 0, "PLCg": 25, "RPL": 0, "RPLP": 0,
    "PLCgP": 0, "PLCgI": 0, "Grb": 20, "RG": 0, "SOS": 15, "RGS": 0, "GS": 0, "Shc": 40,
    "RSh": 0, "RShP": 0, "ShP": 0, "RShG": 0, "ShG": 0, "RShGS": 0, "ShGS": 0,
}

# (reactants, products, rate) in reaction order; MM entries carry (V, K, substrate)
REACTIONS = [
    ({"EGF": 1, "R": 1}, {"Ra": 1}, 0.003),
    ({"Ra": 1}, {"EGF": 1, "R": 1}, 0.06),
    ({"Ra": 2}, {"R2": 1}, 0.01),
    ({"R2": 1}, {"Ra": 2}, 0.1),
    ({"R2": 1}, {"RP": 1}, 0.5),
    ({"RP": 1}, {"R2": 1}, 0.05),
    ({"RP": 1}, {"R2": 1}, ("MM", 2.0, 15.0, "RP")),
    ({"RP": 1, "PLCg": 1}, {"RPL": 1}, 0.006),
    ({"RPL": 1}, {"RP": 1, "PLCg": 1}, 0.2),
    ({"RPL": 1}, {"RPLP": 1}, 0.5),
    ({"RPLP": 1}, {"RPL": 1}, 0.05),
    ({"RPLP": 1}, {"RP": 1, "PLCgP": 1}, 0.3),
    ({"RP": 1, "PLCgP": 1}, {"RPLP": 1}, 0.0005),
    ({"PLCgP": 1}, {"PLCg": 1}, ("MM", 1.5, 10.0, "PLCgP")),
    ({"PLCgP": 1}, {"PLCgI": 1}, 0.02),
    ({"PLCgI": 1}, {"PLCgP": 1}, 0.005),
    ({"RP": 1, "Grb": 1}, {"RG": 1}, 0.004),
    ({"RG": 1}, {"RP": 1, "Grb": 1}, 0.05),
    ({"RG": 1, "SOS": 1}, {"RGS": 1}, 0.004),
    ({"RGS": 1}, {"RG": 1, "SOS": 1}, 0.03),
    ({"RGS": 1}, {"RP": 1, "GS": 1}, 0.05),
    ({"RP": 1, "GS": 1}, {"RGS": 1}, 0.0005),
    ({"GS": 1}, {"Grb": 1, "SOS": 1}, 0.002),
    ({"Grb": 1, "SOS": 1}, {"GS": 1}, 0.0001),
    ({"RP": 1, "Shc": 1}, {"RSh": 1}, 0.003),
    ({"RSh": 1}, {"RP": 1, "Shc": 1}, 0.06),
    ({"RSh": 1}, {"RShP": 1}, 0.6),
    ({"RShP": 1}, {"RSh": 1}, 0.03),
    ({"ShP": 1}, {"Shc": 1}, ("MM", 0.4, 20.0, "ShP")),
    ({"RShP": 1}, {"RP": 1, "ShP": 1}, 0.1),
    ({"RP": 1, "ShP": 1}, {"RShP": 1}, 0.0005),
    ({"RShP": 1, "Grb": 1}, {"RShG": 1}, 0.003),
    ({"RShG": 1}, {"RShP": 1, "Grb": 1}, 0.05),
    ({"RShG": 1}, {"RP": 1, "ShG": 1}, 0.1),
    ({"RP": 1, "ShG": 1}, {"RShG": 1}, 0.0005),
    ({"RShG": 1, "SOS": 1}, {"RShGS": 1}, 0.004),
    ({"RShGS": 1}, {"RShG": 1, "SOS": 1}, 0.05),
    ({"RShGS": 1}, {"RP": 1, "ShGS": 1}, 0.05),
    ({"RP": 1, "ShGS": 1}, {"RShGS": 1}, 0.0005),
    ({"ShP": 1, "Grb": 1}, {"ShG": 1}, 0.001),
    ({"ShG": 1}, {"ShP": 1, "Grb": 1}, 0.02),
    ({"ShG": 1, "SOS": 1}, {"ShGS": 1}, 0.002),
    ({"ShGS": 1}, {"ShG": 1, "SOS": 1}, 0.02),
    ({"ShGS": 1}, {"ShP": 1, "GS": 1}, 0.01),
    ({"ShP": 1, "GS": 1}, {"ShGS": 1}, 0.0005),
    ({"RShP": 1, "GS": 1}, {"RShGS": 1}, 0.001),
    ({"RShGS": 1}, {"RShP": 1, "GS": 1}, 0.01),
]


def build() -> dict:
    assert len(SPECIES) == 23 and len(REACTIONS) == 47
    params, reactions, mm = [], [], []
    for j, (reac, prod, rate) in enumerate(REACTIONS, start=1):
        if isinstance(rate, tuple):
            _, V, K, substrate = rate
            mm += [{"name": f"V{j}", "value": V}, {"name": f"K{j}", "value": K}]
            law = {"michaelisMenten": {"V": f"V{j}", "K": f"K{j}", "substrate": substrate}}
        else:
            params.append({"name": f"k{j}", "value": rate})
            law = {"massAction": {"param": f"k{j}"}}
        reactions.append({"reactants": reac, "products": prod, "law": law})
    return {
        "species": [{"name": n, "initial": c} for n, c in SPECIES.items()],
        "parameters": params + mm,
        "reactions": reactions,
    }


if __name__ == "__main__":
    default = Path(__file__).resolve().parents[1] / "src" / "pathsens" / "fixtures" / "egfr_standin.json"
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else default
    out.write_text(json.dumps(build(), indent=1) + "\n")
    print(out)
