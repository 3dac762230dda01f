from camforge.main import main

main()
