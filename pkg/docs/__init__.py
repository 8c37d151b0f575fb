# Documentation package for the interleaved training and feedback simulator
