from .templates import Template, DEFAULT_PACK, load_pack, generate
