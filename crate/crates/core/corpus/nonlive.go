package main

import "fmt"

// The send after the infinite loop is unreachable, so main waits forever.
func main() {
	ch := make(chan int)
	go func() {
		for {
			fmt.Println("looping")
		}
		ch <- 1
	}()
	<-ch
}
