"""scenestudio: instruction-driven procedural 3D modeling.

Three cooperating agents (task dispatch, conceptualization, modeling) turn
natural-language instructions into validated typed function calls against a
procedural-generation registry. Scenes are executed by a deterministic native
engine; an equivalent Blender-target script is emitted as text.
"""

__version__ = "0.1.0"
