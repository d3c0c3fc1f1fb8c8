"""Vehicle routing with 2D loading constraints."""
