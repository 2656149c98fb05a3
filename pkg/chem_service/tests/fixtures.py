"""Shared fixture data: a small but chemically meaningful template library
and a stock set that make two-step decompositions solvable."""

import json
from pathlib import Path

LIBRARY = {
    "version": 1,
    "templates": [
        {
            "id": "ester_hydrolysis",
            "pattern": "[C:1](=[O:2])[O:3][C:4]>>[C:1](=[O:2])[O:3].[C:4]O",
            "prior": 0.35,
        },
        {
            "id": "amide_coupling",
            "pattern": "[C:1](=[O:2])[N:3]>>[C:1](=[O:2])O.[N:3]",
            "prior": 0.30,
        },
        {
            "id": "williamson_ether",
            "pattern": "[C:1][O:2][C:3]>>[C:1]Br.[O:2][C:3]",
            "prior": 0.15,
        },
        {
            "id": "reductive_amination",
            "pattern": "[CH2:1][N:2]>>[C:1]=O.[N:2]",
            "prior": 0.10,
        },
        {
            "id": "suzuki_biaryl",
            "pattern": "[c:1]-[c:2]>>[c:1]Br.[c:2]B(O)O",
            "prior": 0.10,
        },
    ],
}

STOCK = [
    "CCO",          # ethanol
    "CC(=O)O",      # acetic acid
    "NCC(=O)O",     # glycine
    "CN",           # methylamine
    "CO",           # methanol
    "BrCC",         # bromoethane
    "Brc1ccccc1",   # bromobenzene
    "OB(O)c1ccccc1",  # phenylboronic acid
]

# two-step target: ester split, then amide split of the acid half
TWO_STEP_TARGET = "CC(=O)NCC(=O)OCC"


def write_fixtures(dirpath) -> tuple[Path, Path]:
    dirpath = Path(dirpath)
    templates = dirpath / "templates.json"
    stock = dirpath / "stock.smi"
    templates.write_text(json.dumps(LIBRARY, indent=2) + "\n")
    stock.write_text("\n".join(STOCK) + "\n")
    return templates, stock
