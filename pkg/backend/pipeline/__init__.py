# Package init for pipeline module
