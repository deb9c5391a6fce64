"""Regenerate the case14 oracle fixtures with PYPOWER (pip install pypower).

Writes data/case14.case and tests/fixtures/case14_{ybus,pf}_reference.txt.
"""
import numpy as np
from pypower.api import case14, ppoption, runpf
from pypower.ext2int import ext2int
from pypower.makeYbus import makeYbus

c = case14()
lines = [
    "# IEEE 14-bus test case (standard published data).",
    "# Powers in MW/MVAr on base_mva; impedances in per unit; angles in degrees.",
    "[case]", "name case14", "base_mva 100", "", "[buses]",
    "# id  kind   pd_mw   qd_mvar  gs_mw  bs_mvar  pg_mw  vset_pu",
]
kinds = {1: "pq", 2: "pv", 3: "slack"}
gen = {int(g[0]): g for g in c["gen"]}
for b in c["bus"]:
    i = int(b[0])
    g = gen.get(i)
    pg = g[1] if g is not None else 0.0
    vs = g[5] if g is not None else 1.0
    lines.append(f"{i:<4d} {kinds[int(b[1])]:<6s} {b[2]:7g} {b[3]:8g} {b[4]:6g} {b[5]:8g} {pg:6g} {vs:7g}")
lines += ["", "[branches]", "# from  to   r_pu     x_pu     b_pu    tap    shift_deg"]
for br in c["branch"]:
    tap = br[8] if br[8] != 0 else 1.0
    lines.append(f"{int(br[0]):<5d} {int(br[1]):<4d} {br[2]:<8g} {br[3]:<8g} {br[4]:<7g} {tap:<6g} {br[9]:g}")
open("data/case14.case", "w").write("\n".join(lines) + "\n")

ppc = ext2int(c)
Y = makeYbus(ppc["baseMVA"], ppc["bus"], ppc["branch"])[0].toarray()
with open("tests/fixtures/case14_ybus_reference.txt", "w") as f:
    f.write("# Y-bus of case14 from PYPOWER makeYbus: row col G B (1-based)\n")
    for i in range(14):
        for j in range(14):
            f.write(f"{i+1} {j+1} {Y[i,j].real:.17g} {Y[i,j].imag:.17g}\n")

r, ok = runpf(c, ppoption(VERBOSE=0, OUT_ALL=0, PF_TOL=1e-12))
assert ok
with open("tests/fixtures/case14_pf_reference.txt", "w") as f:
    f.write("# case14 Newton-Raphson solution from PYPOWER runpf (PF_TOL=1e-12): bus vm_pu va_rad\n")
    for b in r["bus"]:
        f.write(f"{int(b[0])} {b[7]:.17g} {np.deg2rad(b[8]):.17g}\n")
