"""Command-line, settings and report layer of pxlab."""
