"""Artifact flow on the command line: model -> evolve -> bound -> closure.

The subcommands speak JSON to each other: anything that carries a "b" field
(a model artifact, a Lanczos result, an ensemble member via --realization,
or a hand-written {"b": [...]}) feeds evolve/bound/closure. This script runs
the same pipeline a shell user would, via subprocess, and peeks at each
artifact along the way.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

work = Path(tempfile.mkdtemp(prefix="kbound-demo-"))


def cli(*args):
    cmd = [sys.executable, "-m", "kbound.cli", *args]
    print("$ kbound " + " ".join(args))
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        sys.exit(proc.stderr.strip() or f"exit {proc.returncode}")
    return proc.stdout


# A finite family from its growth rates, written as a JSON artifact.
model_file = work / "su2.json"
cli("model", "sat:alpha=-4,gamma=198,d=100", "--tmax", "3.14", "--steps", "5",
    "--out", str(model_file))
model = json.loads(model_file.read_text())
print(f"  -> {model['model']}, D = {model['D']}, "
      f"b_1..b_3 = {[round(x, 3) for x in model['b'][:3]]}\n")

# Amplitudes on a coarse grid, straight to stdout as CSV.
out = cli("evolve", str(model_file), "--tmax", "1.0", "--steps", "3")
print("  " + "\n  ".join(line[:70] for line in out.splitlines()[:3]) + "\n")

# The complexity profile with the deviation-time comment up top.
bound_file = work / "profile.csv"
cli("bound", str(model_file), "--tmax", "3.14", "--steps", "101",
    "--out", str(bound_file))
print("  " + "\n  ".join(bound_file.read_text().splitlines()[:3]) + "\n")

# Coefficient-law test: recovers the rates the model was built from.
out = cli("closure", str(model_file))
rep = json.loads(out)
print(f"  -> closed: {rep['closed']}, alpha = {rep['alpha']:.3f}, "
      f"gamma = {rep['gamma']:.3f}, classified {rep['classification']}\n")

# A tiny seeded ensemble; member 0 re-enters the same pipeline.
ens_file = work / "ensemble.json"
cli("goe", "--dim", "6", "--count", "4", "--seed", "1", "--out", str(ens_file))
out = cli("closure", str(ens_file), "--realization", "0")
rep = json.loads(out)
print(f"  -> GOE member 0 closed: {rep['closed']} "
      f"(chaotic chains do not follow the law)")

print(f"\nartifacts kept in {work}")
