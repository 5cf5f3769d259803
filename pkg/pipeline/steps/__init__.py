"""Experiment steps package.

One subpackage per family of experiments:
- expansion: expansion-on-average search, conormal identity, block construction
- lyapunov: QR spectrum and the Furstenberg integral
- spectrum: Galerkin spectra, essential radius, Lasota-Yorke, stability, dd distance
- correlation: correlation decay and multiple mixing
- clt: central limit and Berry-Esseen scaling
"""
