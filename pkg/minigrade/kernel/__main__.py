from .kernel import MiniMLKernel

if __name__ == "__main__":
    MiniMLKernel.run_as_main()
