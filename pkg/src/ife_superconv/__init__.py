"""ife-superconv package."""
