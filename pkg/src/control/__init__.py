# Control compiler package