"""
mechcat: mechanical cat-like states from a two-step protocol.

Step 1 prepares a squeezed mechanical state by two-tone driving of a
magnomechanical system (linearized Gaussian steady state). Step 2 subtracts
phonons with a weak red-detuned optical pulse and photon counting
(truncated Fock-space evolution and conditioning).
"""

__version__ = "1.0.0"
