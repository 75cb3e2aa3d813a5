# Empty file that makes Python recognize this as a package
