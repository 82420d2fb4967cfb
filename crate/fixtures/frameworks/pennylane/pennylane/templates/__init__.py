"""Circuit templates."""
from .embeddings import *
