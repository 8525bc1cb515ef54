"""
Two dosing windows over 60 days
===============================

The first window is active from day 0; the second enters the plasma 30
days later.  Compare against the untreated 60-day run.
"""

from lepra_oc import build_scenario, run_comparison

comp = run_comparison([build_scenario("no-drug-60-delay"), build_scenario("mdt-60-delay"),
                       build_scenario("dap-60-delay")], workers=3)
print(comp.table("final"))
print()
for name, rep in comp.reports.items():
    print(name, rep.message, {k: round(v, 4) for k, v in rep.dosage_summary.items()})

# sign of (drugged - untreated) on day 60 for every compartment
for name, signs in comp.change_sign.items():
    if name != comp.baseline:
        print(name, " ".join(f"{k}{'+' if v > 0 else '-' if v < 0 else '='}" for k, v in signs.items()))
