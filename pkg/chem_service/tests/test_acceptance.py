"""Service acceptance: protocol conformance, loop robustness, and
canonicalization idempotence, with the runtime budget asserted."""

import io
import json
import random
import string
import subprocess
import sys
import time
from pathlib import Path

from chem_service.canon import canonicalize
from chem_service.cli import build_service

from fixtures import write_fixtures
from test_server import random_smiles

GOLDEN = Path(__file__).parent / "golden"


def test_criterion_11_protocol_conformance(tmp_path):
    t0 = time.time()

    # golden-file equality over a real subprocess
    requests = (GOLDEN / "requests.jsonl").read_text()
    expected = (GOLDEN / "responses.jsonl").read_text()
    proc = subprocess.run(
        [sys.executable, "-m", "chem_service.cli",
         "--templates", str(GOLDEN / "templates.json"),
         "--stock", str(GOLDEN / "stock.smi"), "--stdio"],
        input=requests, capture_output=True, text=True, timeout=100)
    golden_ok = proc.returncode == 0 and proc.stdout == expected

    # fuzzed malformed requests never kill the loop
    templates, stock = write_fixtures(tmp_path)
    service = build_service(templates, stock)
    rng = random.Random(99)
    lines = ["".join(rng.choice(string.printable) for _ in range(rng.randint(0, 80)))
             for _ in range(500)]
    buffer = "\n".join(lines) + "\n" + json.dumps({"op": "in_stock", "id": "CCO"}) + "\n"
    writer = io.StringIO()
    service.serve(io.StringIO(buffer), writer)
    out = writer.getvalue().splitlines()
    fuzz_ok = bool(out) and json.loads(out[-1]) == {"ok": True, "member": True}

    # canonicalization idempotence on 1,000 molecule strings
    rng = random.Random(4096)
    idem_ok = True
    for _ in range(1000):
        s = random_smiles(rng)
        once = canonicalize(s)
        if canonicalize(once) != once:
            idem_ok = False
            break

    elapsed = time.time() - t0
    ok = golden_ok and fuzz_ok and idem_ok
    verdict = "PASS" if ok and elapsed < 120 else "FAIL"
    print(f"ACCEPTANCE {verdict} [11] service protocol conformance "
          f"(golden={golden_ok}, fuzz={fuzz_ok}, idempotence={idem_ok}; "
          f"{elapsed:.1f}s / budget 120s)", flush=True)
    assert ok
    assert elapsed < 120
