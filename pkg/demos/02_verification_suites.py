"""Run every analytic verification suite and print a compact scoreboard.

Three suites back the expansion machinery:

  * the absorption suite checks the regular-variation structure of the
    nonlinearity and its primitive (index ratios, tail limits),
  * the transform suite checks the limits that govern h composed with
    the kernel antiderivative K near the boundary,
  * the functionals suite evaluates the combined boundary functional
    whose sign, for both perturbation signs, drives the squeeze
    argument behind the two-term expansion.

Each claimed limit is re-estimated from a geometric grid with one
extrapolation step; PASS means the extrapolant agrees with the claim
and the residual tail is monotone.
"""

from blowup.config import canonical_config
from blowup.harness import cmd_verify

cfg = canonical_config()
cfg.out_dir = "out/suites"

for suite in ("lemma2", "lemma3", "functionals"):
    record, code = cmd_verify(cfg, suite, quiet=True)
    status = "PASS" if code == 0 else "FAIL"
    print(f"{suite:12s} {status}")
    for label, part in record["parts"].items():
        if "claimed" not in part:
            print(f"    {label:34s} ERROR {part.get('error')}")
            continue
        print(f"    {label:34s} claimed {part['claimed']:+.6g}  "
              f"extrapolated {part['extrapolated']:+.6g}  "
              f"{'ok' if part['passed'] else 'MISMATCH'}")
    print()

print("artifacts written to", cfg.out_dir)
