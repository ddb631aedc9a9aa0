# Package init for sensor module
