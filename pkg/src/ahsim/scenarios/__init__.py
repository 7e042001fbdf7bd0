"""Built-in scenario definitions (YAML)."""
