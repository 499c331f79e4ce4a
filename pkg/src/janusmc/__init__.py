"""Spin-model Monte Carlo engines and an exact-enumeration oracle harness.

Subpackages map one-to-one onto the simulation stack: lattice geometry and
Hamiltonians (`lattice`, `models`), the Parisi-Rapuano generator (`prng`),
probability tables and scalar sweep engines (`tables`, `engines`),
multi-spin-coded engines (`bitslice`), the threaded domain-grid engine
(`grid`), antiferromagnetic-Potts graph coloring (`graphs`, `coloring`),
measurement and exact Boltzmann enumeration (`observables`), and the CLI /
benchmark front end (`cli`, `bench`, `verify`).
"""

__version__ = "0.1.0"
