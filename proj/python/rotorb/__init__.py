"""Q-rotating periodic orbits of convex Hamiltonian systems.

Thin wrapper over the compiled module.  When running from a build tree the
extension lives next to the build artifacts rather than inside the package.
"""

try:
    from ._rotorb import *  # noqa: F401,F403
except ImportError:  # build-tree layout
    from _rotorb import *  # noqa: F401,F403
