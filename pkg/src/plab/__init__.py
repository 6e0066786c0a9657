"""plab: numerical laboratory for p-Poisson flux regularity.

Library layout mirrors the pipeline: `orlicz` (closed-form N-function and
flux-map algebra), `field` (grid fields, ball averages, oscillations),
`solver` (damped-Newton p-Poisson solves and exact-solution catalogue),
`besov` (oscillation-based Besov / Triebel-Lizorkin seminorm estimators),
`decay` (decay-rate and comparison-inequality measurement harness),
`experiments` (seeded experiment drivers), `cli` (command-line front end).
"""

__version__ = "0.1.0"

from . import besov, decay, experiments, field, orlicz, solver  # noqa: F401
