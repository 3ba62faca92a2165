"""Command-line front end (`qleak`)."""
