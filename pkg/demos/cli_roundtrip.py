"""
Command line round trip
=======================

Runs ``analyze`` and ``compare`` on the example scenario, then replays the
analysis from the manifest it wrote and checks the CSV files match byte for
byte.

Expect ``compare`` to exit with 1: 100 m down a boresight the serving site's
own sectors cap the SINR, most of the mass sits inside one 0.1 dB cell below
that cap, and the KS distance (taken between grid nodes) exceeds its
tolerance even though every tail probe passes.
"""
import pathlib
import tempfile

from sinrmodel.cli import main

here = pathlib.Path(__file__).parent
out = pathlib.Path(tempfile.mkdtemp(prefix="sinrmodel-"))

main(["analyze", "--config", str(here / "scenario.json"), "--out", str(out / "a")])
print("analyze wrote:", ", ".join(sorted(p.name for p in (out / "a").iterdir())))

code = main(["compare", "--config", str(here / "scenario.json"), "--out", str(out / "c"), "--samples", "200000"])
print("compare exit code:", code)

main(["analyze", "--config", str(out / "a" / "manifest.json"), "--out", str(out / "b")])
same = all((out / "a" / p.name).read_bytes() == p.read_bytes() for p in (out / "b").glob("*.csv"))
print("replay from manifest identical:", same)
print("outputs under", out)
