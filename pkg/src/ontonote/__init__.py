"""Ontology-guided annotation activities.

Instructors publish a concept taxonomy; students annotate course documents
and classify each annotation with final concepts (optionally proposing new
ones under extensible branches); instructors then query the annotations by
concept criteria and analyze participation with nonparametric statistics.
"""

__version__ = "0.1.0"

from .errors import OntoNoteError  # noqa: F401
