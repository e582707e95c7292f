"""Stable names for files written by BridgeShift.

Dataset CSVs: one file per (domain, split), named ``{domain}_{split}.csv`` with
domain ``z0``, ``z1``, ... for sources and ``target`` for the target. Columns are
``x0..``, ``w0..``, ``c0..`` for vector blocks, ``y`` and ``z`` for scalar ones
(``y0..`` when Y is one-hot), and ``u0..`` only when latent columns are written.

Model files: a zip container with ``header.json`` plus one ``.npy`` entry per array.
"""

from __future__ import annotations

# Column prefixes per variable (stable API)
COLUMN_PREFIX: dict[str, str] = {"X": "x", "W": "w", "C": "c", "Y": "y", "Z": "z", "U": "u"}
SCALAR_VARIABLES = ("Y", "Z")
LATENT_VARIABLES = ("U",)
COLUMN_PATTERN = r"^(?P<prefix>[xwcyzu])(?P<index>\d*)$"

# CSV formatting
FLOAT_FORMAT = "%.17g"
LINE_TERMINATOR = "\n"

# Dataset file names
DATASET_FILE = "{domain}_{split}.csv"

# Prediction / metric files
COL_PREDICTION = "prediction"
COL_SCORE_PREFIX = "score_"

# Model file layout
MODEL_FORMAT = "bridgeshift-model"
MODEL_FORMAT_VERSION = 1
MODEL_SUFFIX = ".bsm"
ENTRY_HEADER = "header.json"
ENTRY_GAMMA = "gamma.npy"
ENTRY_U = "u.npy"
ENTRY_Y = "y.npy"
ENTRY_ANCHORS_W = "anchors_w.npy"
ENTRY_ANCHORS_V = "anchors_v.npy"
ENTRY_DOUBLE_W3 = "double_cme/w3.npy"
ENTRY_DOUBLE_X3 = "double_cme/x3.npy"
ENTRY_DOUBLE_X4 = "double_cme/x4.npy"
ENTRY_DOUBLE_C4 = "double_cme/c4.npy"

# Fixed zip timestamp so repeated saves are byte-identical.
ZIP_DATE_TIME = (1980, 1, 1, 0, 0, 0)

# Cosine counterexample tables (gen on the cosine scenario)
COSINE_FILE = "cosine_tables.csv"
COL_GRID = "u"
COL_DENSITY_PREFIX = "p"
COL_RESIDUAL = "g"
