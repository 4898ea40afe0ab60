"""bmlab: desk-scale constructions for families of normed spaces.

Subpackages by theme:

* :mod:`bmlab.signset` -- separated sign sets, antichains, spherical codes
* :mod:`bmlab.spaces` -- polytopal / ellipsoidal norms, nets, embeddings
* :mod:`bmlab.bmdist` -- operator norms, distance bounds, certificates
* :mod:`bmlab.qexpander` -- unitary tuples, defects, tensor-overlap families
* :mod:`bmlab.bounds` -- tower-scale counting arithmetic
* :mod:`bmlab.harness` -- reproducible experiments and report verification
"""

__version__ = "0.1.0"
