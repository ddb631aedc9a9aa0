# Package init for analysis module
