"""quadlab: exact laws, conditioned samplers, and planar-map surgery for
radius-r hulls of the uniform infinite planar quadrangulation.

The package is organized around five building blocks:

* :mod:`quadlab.exactlaws` -- exact rational evaluation of the generating
  functions, offspring law, hull-perimeter law and related distributions.
* :mod:`quadlab.skeleton` -- plane forests and exact samplers for the
  conditioned branching-process laws that drive hull skeletons.
* :mod:`quadlab.geometry` -- half-edge planar maps, the forest/map
  bijection, separating cycles and volume statistics.
* :mod:`quadlab.bridge` -- discrete bridges, the cactus pseudo-distance
  and the clustered-points event estimator.
* :mod:`quadlab.cli` -- reproducible command-line front end.
"""

__version__ = "0.1.0"
