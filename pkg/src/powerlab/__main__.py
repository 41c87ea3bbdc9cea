from powerlab.cli import main

main()
