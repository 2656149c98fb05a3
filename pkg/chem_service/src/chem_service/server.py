"""The expansion-oracle service: answers expand / fingerprint / in_stock
requests over the newline-delimited JSON protocol.

One UTF-8 JSON object per line, requests and responses alternating.  A
malformed request produces {"ok": false, "error": ...} and never terminates
the loop.  Fingerprint packing: bit i in byte i // 8, most significant bit
first, base64-encoded as 256 bytes.
"""

from __future__ import annotations

import base64
import json
from typing import Optional

from .canon import canonical_smiles
from .fingerprint import molecule_fingerprint
from .library import StockIndex, TemplateLibrary
from .mol import SmilesError, parse_smiles
from .templates import apply_template


class OracleService:
    def __init__(self, library: TemplateLibrary, stock: StockIndex,
                 model_weights: Optional[dict[str, float]] = None):
        self.library = library
        self.stock = stock
        self.model_weights = model_weights or {}
        self._tmpl_fp_cache: dict[str, str] = {}
        self._mol_fp_cache: dict[str, str] = {}

    # -- fingerprints ------------------------------------------------------

    def _template_fp_b64(self, entry) -> str:
        cached = self._tmpl_fp_cache.get(entry.template.template_id)
        if cached is None:
            cached = base64.b64encode(entry.template.fingerprint).decode("ascii")
            self._tmpl_fp_cache[entry.template.template_id] = cached
        return cached

    def _mol_fp_b64(self, canonical: str) -> str:
        cached = self._mol_fp_cache.get(canonical)
        if cached is None:
            fp = molecule_fingerprint(parse_smiles(canonical))
            cached = base64.b64encode(fp).decode("ascii")
            self._mol_fp_cache[canonical] = cached
        return cached

    # -- request handling --------------------------------------------------

    def handle_line(self, line: str) -> dict:
        try:
            req = json.loads(line)
        except json.JSONDecodeError as exc:
            return {"ok": False, "error": f"malformed json: {exc}"}
        if not isinstance(req, dict) or "op" not in req:
            return {"ok": False, "error": "request must be an object with an op"}
        op = req["op"]
        try:
            if op == "expand":
                return self._expand(req)
            if op == "fingerprint":
                return self._fingerprint(req)
            if op == "in_stock":
                return self._in_stock(req)
            return {"ok": False, "error": f"unknown op {op!r}"}
        except SmilesError as exc:
            return {"ok": False, "error": f"bad molecule: {exc}"}
        except (KeyError, TypeError, ValueError) as exc:
            return {"ok": False, "error": f"bad request: {exc}"}

    def _expand(self, req: dict) -> dict:
        mol_text = req["id"]
        k = int(req["k"])
        if k < 1:
            return {"ok": False, "error": "k must be >= 1"}
        if not isinstance(mol_text, str) or not mol_text:
            return {"ok": False, "error": "id must be a non-empty string"}
        mol = parse_smiles(mol_text)
        candidates = []
        for entry in self.library.entries:
            weight = self.model_weights.get(entry.template.template_id, entry.prior)
            for reactants in apply_template(entry.template, mol):
                candidates.append((weight, entry, reactants))
        candidates.sort(key=lambda c: (-c[0], c[1].template.template_id, c[2]))
        kept = candidates[:k]
        total = sum(w for w, _, _ in kept)
        templates = []
        for weight, entry, reactants in kept:
            templates.append({
                "template_id": entry.template.template_id,
                "fp_b64": self._template_fp_b64(entry),
                "p": weight / total,
                "reactants": [
                    {"id": smiles, "fp_b64": self._mol_fp_b64(smiles)}
                    for smiles in reactants
                ],
            })
        return {"ok": True, "templates": templates}

    def _fingerprint(self, req: dict) -> dict:
        mol = parse_smiles(req["id"])
        canonical = canonical_smiles(mol)
        return {"ok": True, "bits_b64": self._mol_fp_b64(canonical)}

    def _in_stock(self, req: dict) -> dict:
        smiles = req["id"]
        if not isinstance(smiles, str) or not smiles:
            return {"ok": False, "error": "id must be a non-empty string"}
        return {"ok": True, "member": smiles in self.stock}

    # -- loop ----------------------------------------------------------------

    def serve(self, reader, writer) -> None:
        """Answers requests until EOF; a per-request failure never kills the
        loop."""
        for line in reader:
            if not line.strip():
                continue
            try:
                response = self.handle_line(line)
            except Exception as exc:  # noqa: BLE001 - protocol armor
                response = {"ok": False, "error": f"internal error: {exc}"}
            writer.write(json.dumps(response) + "\n")
            writer.flush()
