from crlink.cli import main

raise SystemExit(main())
