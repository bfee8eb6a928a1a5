__all__ = ["files", "json"]
