"""Current steering for multi-contact stimulation leads.

Subpackages: :mod:`leadsteer.leadfield` (geometry, synthetic lead fields,
noise, I/O), :mod:`leadsteer.lp` (LP formulation and simplex engine) and
:mod:`leadsteer.harness` (study runner and CLI). :mod:`leadsteer.solvers`
holds the three steering methods and :mod:`leadsteer.search` the
hyperparameter lattice search.
"""

__version__ = "0.1.0"
