"""codemap: spatial maps of codebases.

Ingests a source tree, embeds files in 2D by combined lexical and structural
dissimilarity, renders the result as a shaded-relief map, and serves it to
collaborating viewers.
"""

__version__ = "0.1.0"
