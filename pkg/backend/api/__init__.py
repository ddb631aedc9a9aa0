# Package init for API module
