# blank init to allow tests to be run from this directory
