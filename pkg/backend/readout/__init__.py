# Package init for readout module
