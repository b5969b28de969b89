# Empty file to mark directory as package
