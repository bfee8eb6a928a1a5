__all__ = ["exceptions", "utils"]
