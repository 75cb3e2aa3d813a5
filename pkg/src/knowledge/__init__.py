# Empty file that makes Python recognize these as packages
