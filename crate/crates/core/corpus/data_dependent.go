package main

func f() int {
	return readInt()
}

// Both branches depend on the same value, but the model cannot tell.
func main() {
	ch := make(chan int)
	x := f()
	go func() {
		if x > 0 {
			ch <- 1
		}
	}()
	if x > 0 {
		<-ch
	}
}
