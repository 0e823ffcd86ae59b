"""Builders for synthetic APK fixtures: binary XML, DEX and ZIP writers."""
