# Package init for data module
