from termcolor import colored

def main():
    print(colored("TariffMenu - Command Summary", "green", attrs=["bold"]))
    print("-" * 50)

    commands = [
        ("solve", "Optimal menu under one payment regime", "tm solve <file> [--regime full|upfront|usage|mandatory]"),
        ("compare", "All four regimes, gap ratios and the sandwich bound", "tm compare <file>"),
        ("fptas", "Approximate indirect menu within (1 - eps)", "tm fptas <file> [--eps 1/10] [--no-trim]"),
        ("single-param", "Single contract analysis for alpha * baseline valuations", "tm single-param <file>"),
        ("reduce-partition", "Decide Partition through the pricing reduction", "tm reduce-partition --items 1,1"),
        ("gen", "Write an instance family to JSON", "tm gen {hmu|usage-gap|partition|counterexample|random} -o <file>"),
        ("check-menu", "Validate a menu file and price it", "tm check-menu <file> <menufile> [--regime voluntary|mandatory]"),
        ("defaults", "Show or persist default options", "tm defaults [--show] [--epsilon r] [--threads n]"),
        ("tmh", "Show this help message", "tmh"),
    ]

    for cmd, desc, usage in commands:
        print(f"{colored(cmd, 'cyan', attrs=['bold'])} : {desc}")
        print(f"     Usage: {usage}")
        print()

    print("-" * 50)
    print("Add --json for machine-readable reports, -v for solver progress. (e.g., tm solve --help)")

if __name__ == "__main__":
    main()
