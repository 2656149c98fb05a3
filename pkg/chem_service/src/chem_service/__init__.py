"""Template-based retrosynthetic expansion oracle with a self-contained
SMILES toolkit, speaking the line-JSON wire protocol."""

from .canon import canonical_smiles, canonicalize
from .fingerprint import molecule_fingerprint, reaction_fingerprint
from .library import StockIndex, TemplateLibrary
from .mol import Atom, Mol, SmilesError, parse_smiles
from .server import OracleService
from .templates import Template, TemplateError, apply_template, parse_template

__version__ = "0.1.0"
