# Make tests a package so `tests.helpers` can be imported in test modules.
