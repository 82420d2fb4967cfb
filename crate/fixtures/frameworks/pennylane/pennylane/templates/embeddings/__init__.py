from .amplitude import AmplitudeEmbedding
from .angle import AngleEmbedding
