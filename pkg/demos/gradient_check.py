"""
Checking the adjoint gradient
=============================

The co-state gives dJ/dD for every node at the cost of one backward sweep.
Here it is compared with central differences of J along constant
perturbations, for both adjoint forms.
"""

from lepra_oc.verification import gradient_agreement, short_horizon_scenario

for two in (False, True):
    # 5-day horizon with the delays shortened so the toxicity lag acts inside it
    sc = short_horizon_scenario(two, tau=2.0, tau_d=1.0)
    print(sc.name)
    for form in ("exact", "instantaneous"):
        for label, (ad, fd) in gradient_agreement(sc, adjoint_form=form).items():
            print(f"  {form:<13} {label:<15} adjoint {ad:14.6f}  fd {fd:14.6f}  rel {abs(ad - fd) / abs(fd):.1e}")

# The "instantaneous" form evaluates the delayed toxicity term at the current time
# instead of the advanced time t + lag; the error shows up once a real lag
# sits inside the horizon.
