from hesslab.cli import main

main()
